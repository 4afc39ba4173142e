from .base import BaseCallbackHandler
from .logging import LoggingCallbackHandler
