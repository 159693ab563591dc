import logging
import sys
from typing import Callable, Dict, Optional, Tuple, Type

from lobjump.exceptions import LobJumpError
from lobjump.routes.stages import Stage, StageRouter, router as stages_router
from lobjump.schemas.config import load_run_config
from lobjump.schemas.responses import StageResponse
from lobjump.storage import get_store

logger = logging.getLogger(__name__)

ErrorHandler = Callable[[str, Exception], StageResponse]

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(verbose: bool = False) -> None:
    """Route package logs to stderr; DEBUG when verbose"""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


class PipelineApp:
    """Stage registry plus exception handlers that turn failures into result envelopes."""

    def __init__(self, title: str, version: str):
        self.title = title
        self.version = version
        self.stages: Dict[str, Stage] = {}
        self.handlers: Dict[Type[Exception], ErrorHandler] = {}

    def include_router(self, router: StageRouter) -> None:
        self.stages.update(router.stages)

    def exception_handler(self, exc_class: Type[Exception]):
        def decorator(func: ErrorHandler) -> ErrorHandler:
            self.handlers[exc_class] = func
            return func
        return decorator

    def _handle(self, stage: str, exc: Exception) -> Optional[StageResponse]:
        for cls in type(exc).__mro__:
            if cls in self.handlers:
                return self.handlers[cls](stage, exc)
        return None

    def run(self, stage: str, config_path=None, seed: Optional[int] = None,
            output_dir: Optional[str] = None, **options) -> Tuple[int, StageResponse]:
        """
        Load the configuration and run one stage.

        Args:
            stage: Registered stage name
            config_path: Optional `key = value` config file
            seed: Optional seed override
            output_dir: Optional override of the configured output directory
            **options: Stage-specific options

        Returns:
            Exit code and the result envelope
        """
        if stage not in self.stages:
            return 2, StageResponse(result="error", stage=stage, error="UnknownStage",
                                    message=f"unknown stage '{stage}'")
        try:
            config = load_run_config(config_path, seed)
            if output_dir is not None:
                config = config.model_copy(update={"output_dir": output_dir})
            logger.info("Running stage %s into %s", stage, config.output_dir)
            response = self.stages[stage].handler(config, get_store(config.output_dir), **options)
            return 0, response
        except Exception as exc:
            response = self._handle(stage, exc)
            if response is None:
                raise
            return 1, response


app = PipelineApp(
    title="Limit order book price-jump pipeline",
    version="1.0.0",
)

app.include_router(stages_router)


@app.exception_handler(LobJumpError)
def pipeline_exception_handler(stage: str, exc: Exception) -> StageResponse:
    """Handle expected pipeline errors"""
    logger.error("Stage %s failed: %s", stage, exc)
    return StageResponse(result="error", stage=stage, error=type(exc).__name__, message=str(exc))


@app.exception_handler(OSError)
def io_exception_handler(stage: str, exc: Exception) -> StageResponse:
    """Handle unreadable or unwritable files"""
    logger.error("Stage %s hit an I/O error: %s", stage, exc)
    return StageResponse(result="error", stage=stage, error=type(exc).__name__, message=str(exc))


@app.exception_handler(ValueError)
def value_exception_handler(stage: str, exc: Exception) -> StageResponse:
    """Handle bad values that escaped the pipeline's own checks"""
    logger.error("Stage %s rejected a value: %s", stage, exc)
    return StageResponse(result="error", stage=stage, error=type(exc).__name__, message=str(exc))
