"""Exact homological calculator over prime fields."""
from .fp import FpMatrix, kernel_basis, rank, rref
from .graded import INDETERMINATE, GradedSpace, GradeIndex, Window
from .stacks import alpha, crys_BG, derham_BG, hodge_BG, mu, product
from .spectral import forced_search

__version__ = "0.1.0"
