__all__ = [
    "bose_hubbard", "quantum_phase", "meanfield", "stability", "witness", "compare",
    "cli", "config", "errors", "utils", "fs", "commands",
]
__version__ = "0.1.0"
