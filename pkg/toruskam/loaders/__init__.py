from .exceptions import ConfigLoaderException
from .loader import DocumentLoader, ExperimentConfigLoader
