"""
Simulation module - synthetic shopping worlds for end-to-end checks.
"""

__all__ = [
    "ToyWorldConfig",
    "generate_world",
    "generate_intervention_test",
    "generate_toy_dataset",
    "scenario_trip",
    "write_world",
]


def __getattr__(name):
    if name in __all__:
        from . import toy_world
        return getattr(toy_world, name)
    raise AttributeError(f"module 'src.simulation' has no attribute {name}")
