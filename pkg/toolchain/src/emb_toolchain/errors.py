"""Toolchain failure classes; exit codes mirror the engine CLI's scheme."""


class ToolchainError(Exception):
    exit_code = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class UsageError(ToolchainError):
    exit_code = 2


class DataError(ToolchainError):
    exit_code = 4
