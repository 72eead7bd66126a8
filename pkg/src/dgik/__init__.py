"""Generative graphical inverse kinematics for serial manipulators.

Distance-geometric graph representations of revolute chains, a conditional
generative model over solution graphs built from equivariant message
passing, plus forward kinematics, configuration reconstruction, local
refinement and evaluation tooling.
"""

__version__ = "0.1.0"
