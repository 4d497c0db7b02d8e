from typing import Optional


class SimulationError(Exception):
    """Base error. `exit_code` is what the CLI returns when this escapes."""

    exit_code = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class ConfigParseError(SimulationError):
    exit_code = 2

    def __init__(self, detail: str, line_no: int):
        super().__init__(f"line {line_no}: {detail}")
        self.line_no = line_no


class ConfigValidationError(SimulationError):
    exit_code = 2


class TimeStepError(SimulationError):
    pass


class QueryRadiusError(SimulationError):
    pass


class StartOffFilamentError(SimulationError):
    pass


class NoFilamentError(SimulationError):
    pass


class EmptyGroupError(SimulationError):
    pass
