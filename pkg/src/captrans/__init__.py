"""Strategic capacity planning for a clean technology transition under carbon taxes."""
from .instance import Instance, builtin_example, load_instance, save_instance
from .model import SPT, SPWT, MilpModel, Plan, build, decode

__version__ = "0.1.0"

__all__ = [
    "Instance", "builtin_example", "load_instance", "save_instance",
    "SPT", "SPWT", "MilpModel", "Plan", "build", "decode",
]
