"""Errors raised while ingesting files for a command."""

from common.errors import FemurSegError


class IngestionError(FemurSegError):
    """A case's files could not be read or decoded."""

    def __init__(self, case_id: str, message: str):
        self.case_id = case_id
        super().__init__(f"{case_id}: {message}")


class PairingError(FemurSegError):
    """Predictions and ground-truth masks do not pair up one-to-one."""

    pass
