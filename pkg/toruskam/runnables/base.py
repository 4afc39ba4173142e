from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from toruskam.callbacks import BaseCallbackHandler
from toruskam.utils import format_value, generate_uuid


class RunnableConfig(BaseModel):
    """
    Configuration shared by long-running library calls.

    Attributes:
        run_id (str): Identifier passed to callbacks.
        callbacks (list[BaseCallbackHandler]): List of callback handlers.
        max_workers (int | None): Maximum number of worker threads for scans.
    """

    run_id: str = Field(default_factory=generate_uuid)
    callbacks: list[BaseCallbackHandler] = []
    max_workers: int | None = None

    model_config = ConfigDict(arbitrary_types_allowed=True)


class RunnableStatus(Enum):
    """
    Enumeration of possible statuses for a command result.

    Attributes:
        UNDEFINED: Undefined status.
        FAILURE: Failure status.
        SUCCESS: Success status.
    """

    UNDEFINED = "undefined"
    FAILURE = "failure"
    SUCCESS = "success"


class RunnableResult(BaseModel):
    """
    Result of a command execution.

    Attributes:
        status (RunnableStatus): The status of the execution.
        output (Any): The output data of the execution.
        error (Any): The error raised by the execution, if any.
    """

    status: RunnableStatus
    output: Any = None
    error: Any = None

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def to_dict(self, **kwargs) -> dict:
        """
        Convert the RunnableResult instance to a dictionary.

        Returns:
            dict: A dictionary representation of the RunnableResult.
        """
        result = {"status": self.status.value, "output": format_value(self.output)}
        if self.error is not None:
            result["error"] = format_value(self.error)
        return result
