from os import PathLike

from pydantic import ValidationError

from toruskam.cli.config import ExperimentConfig
from toruskam.loaders.exceptions import ConfigLoaderException
from toruskam.utils.logger import logger


class DocumentLoader:
    """Loader for JSON (or YAML) documents through OmegaConf."""

    @classmethod
    def loads(cls, file_path: str | PathLike) -> dict:
        """
        Load a document as plain containers with interpolations resolved.

        Args:
            file_path: Path to the document.

        Returns:
            dict: Parsed data.

        Raises:
            ConfigLoaderException: If the file is missing, malformed or not a mapping.
        """
        from omegaconf import OmegaConf

        try:
            conf = OmegaConf.load(file_path)
            logger.debug(f"Loaded document from '{file_path}'")

            data = OmegaConf.to_container(conf, resolve=True)
        except FileNotFoundError:
            raise ConfigLoaderException(f"File '{file_path}' not found")
        except Exception as e:
            raise ConfigLoaderException(f"File '{file_path}' is malformed: {e}") from e

        if not isinstance(data, dict):
            raise ConfigLoaderException(f"File '{file_path}' must hold a mapping, got {type(data).__name__}")
        return data


class ExperimentConfigLoader(DocumentLoader):
    """Loader of experiment configs."""

    @classmethod
    def load(cls, file_path: str | PathLike) -> ExperimentConfig:
        """
        Load an experiment config file and validate it.

        Args:
            file_path: Path to the config file.

        Returns:
            ExperimentConfig: Validated config.
        """
        return cls.parse(cls.loads(file_path))

    @classmethod
    def parse(cls, data: dict) -> ExperimentConfig:
        """
        Validate config data.

        Raises:
            ConfigLoaderException: If a section is missing or fails validation.
        """
        try:
            return ExperimentConfig.model_validate(data)
        except (ValidationError, KeyError, TypeError, ValueError) as e:
            logger.error(f"Invalid experiment config. Error: {e}")
            raise ConfigLoaderException(f"Invalid experiment config: {e}") from e
