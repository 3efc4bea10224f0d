# Utility functions and helpers for the simulator

from .validators import (validate_density_matrix_payload, validate_counts_payload, validate_batch,
                         validate_shots, parse_complex_matrix)
from .settings import Settings, load_settings, configure_logging

__all__ = ['validate_density_matrix_payload', 'validate_counts_payload', 'validate_batch',
           'validate_shots', 'parse_complex_matrix', 'Settings', 'load_settings', 'configure_logging']
