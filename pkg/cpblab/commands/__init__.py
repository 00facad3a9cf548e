from . import spectrum, band, dynamics, coupled, lindblad, gibbs, witness, compare

__all__ = ["spectrum", "band", "dynamics", "coupled", "lindblad", "gibbs", "witness", "compare"]
