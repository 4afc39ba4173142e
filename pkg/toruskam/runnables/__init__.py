from .base import RunnableConfig, RunnableResult, RunnableStatus
