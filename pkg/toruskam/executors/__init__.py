from .base import BaseExecutor
from .pool import PoolExecutor, ThreadExecutor
