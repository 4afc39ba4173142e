import os

__version__ = "0.1.0"

ROOT_PATH = os.path.dirname(__file__)
