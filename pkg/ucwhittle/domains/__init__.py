"""RMAB instance construction: synthetic generators and dataset sampling."""
from ucwhittle.domains.dataset import COLUMNS, generate_dataset, load_dataset, read_dataset, write_dataset
from ucwhittle.domains.generators import (
    GENERATORS,
    DomainGenerator,
    ThinMarginGenerator,
    WideMarginGenerator,
    generate_thin,
    generate_wide,
    get_generator,
)
from ucwhittle.domains.instance import RmabInstance, validity_violations

__all__ = [
    "COLUMNS",
    "GENERATORS",
    "DomainGenerator",
    "RmabInstance",
    "ThinMarginGenerator",
    "WideMarginGenerator",
    "generate_dataset",
    "generate_thin",
    "generate_wide",
    "get_generator",
    "load_dataset",
    "read_dataset",
    "validity_violations",
    "write_dataset",
]
