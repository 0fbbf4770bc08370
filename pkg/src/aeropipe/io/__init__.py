from .container import ContainerDataset, ContainerResult, read_container, write_container
from .ensight import CaseDescriptor, parse_case, read_geometry, read_scalar_variable
from .material import Material, parse_material
from .trace import MicrophoneTrace, read_mic_trace, write_mic_trace

__all__ = [
    "CaseDescriptor",
    "ContainerDataset",
    "ContainerResult",
    "Material",
    "MicrophoneTrace",
    "parse_case",
    "parse_material",
    "read_container",
    "read_geometry",
    "read_mic_trace",
    "read_scalar_variable",
    "write_container",
    "write_mic_trace",
]
