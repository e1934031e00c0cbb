"""mudep: mutation-based dependency inference and taint-summary stubs for
opaque native functions, driving a whole-program taint analysis."""

__version__ = "0.1.0"
