import numpy as np

from wshsa.scheme import LinearScheme, example1_scheme


def example1_over_f2() -> LinearScheme:
    """The example 1 construction rebuilt over F_2 (absorber recomputed there)."""
    s = example1_scheme()
    maps = {x: g.copy() for x, g in s.key_maps.items() if x != (3, 2)}
    maps = {x: g % 2 for x, g in maps.items()}
    maps[(3, 2)] = (-sum(maps.values())) % 2
    return LinearScheme(2, s.L, s.Lz, maps)
