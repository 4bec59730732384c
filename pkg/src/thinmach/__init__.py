"""Low-Mach, thin-slab compressible flow laboratory.

Compressible Navier-Stokes on a thin periodic slab, its planar incompressible
limits, the acoustic wave system, and the measurements that track the
singular limit.
"""

__version__ = "0.1.0"
