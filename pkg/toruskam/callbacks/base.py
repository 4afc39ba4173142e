from abc import ABC
from typing import Any


class BaseCallbackHandler(ABC):
    """Abstract base class for KAM run callback handlers."""

    def on_run_start(self, serialized: dict[str, Any], input_data: dict[str, Any], **kwargs: Any):
        """Called when a linearization run starts.

        Args:
            serialized (dict[str, Any]): Serialized run parameters.
            input_data (dict[str, Any]): Summary of the input system.
            **kwargs (Any): Additional arguments.
        """
        pass

    def on_run_end(self, serialized: dict[str, Any], output_data: dict[str, Any], **kwargs: Any):
        """Called when a linearization run ends.

        Args:
            serialized (dict[str, Any]): Serialized run parameters.
            output_data (dict[str, Any]): Serialized report.
            **kwargs (Any): Additional arguments.
        """
        pass

    def on_run_error(self, serialized: dict[str, Any], error: BaseException, **kwargs: Any):
        """Called when a linearization run errors.

        Args:
            serialized (dict[str, Any]): Serialized run parameters.
            error (BaseException): Error encountered.
            **kwargs (Any): Additional arguments.
        """
        pass

    def on_step_start(self, serialized: dict[str, Any], input_data: dict[str, Any], **kwargs: Any):
        """Called before a Newton step.

        Args:
            serialized (dict[str, Any]): Serialized run parameters.
            input_data (dict[str, Any]): Step index and current vanishing order.
            **kwargs (Any): Additional arguments.
        """
        pass

    def on_step_end(self, serialized: dict[str, Any], output_data: dict[str, Any], **kwargs: Any):
        """Called after an accepted Newton step.

        Args:
            serialized (dict[str, Any]): Serialized run parameters.
            output_data (dict[str, Any]): The report row of the step.
            **kwargs (Any): Additional arguments.
        """
        pass
