from typing import Any

from toruskam.callbacks.base import BaseCallbackHandler
from toruskam.utils.logger import logger


class LoggingCallbackHandler(BaseCallbackHandler):
    """Logs run milestones and one line per Newton step."""

    def on_run_start(self, serialized: dict[str, Any], input_data: dict[str, Any], **kwargs: Any):
        logger.info(
            f"KAM run {kwargs.get('run_id')}: start n={input_data.get('n')} d={input_data.get('d')} "
            f"v_min={input_data.get('v_min')} Q_max={input_data.get('q_max')}"
        )

    def on_step_end(self, serialized: dict[str, Any], output_data: dict[str, Any], **kwargs: Any):
        logger.info(
            f"KAM run {kwargs.get('run_id')}: step k={output_data['k']} q_k={output_data['q_k']} "
            f"v_min={output_data['v_min']} residual={output_data['residual_bound']:.3e} "
            f"phi_norm={output_data['phi_norm']:.3e}"
        )

    def on_run_end(self, serialized: dict[str, Any], output_data: dict[str, Any], **kwargs: Any):
        logger.info(
            f"KAM run {kwargs.get('run_id')}: end converged={output_data.get('converged')} "
            f"steps={len(output_data.get('rows', []))}"
        )

    def on_run_error(self, serialized: dict[str, Any], error: BaseException, **kwargs: Any):
        logger.error(f"KAM run {kwargs.get('run_id')}: failed. Error: {error}")
