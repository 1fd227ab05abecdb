"""Variational cluster approximation for Hubbard lattices with an emulated quantum cluster solver."""

from .ed import EigenSolution, ResourceGuardError, diagonalize, lehmann_green
from .emulator import DensityMatrix, Evolution, GibbsPrepConfig, exact_gibbs, measure_correlation, prepare_gibbs_riera
from .greens import CorrelationRecord, NambuGreensFunction, TimeGrid, invert_xy, retarded_transform
from .model import ClusterModel, ConfigurationError, VariationalParams, build_cluster_hamiltonian, perturbation_matrix
from .observables import cpt_green, scalar_observables, spectra_and_distributions
from .operators import DomainError, PauliOperator, PauliString, jw_annihilate, jw_create, jw_hermitian_pair
from .vca import LehmannBackend, TimeDomainBackend, VcaResult, find_saddle, grand_potential

__version__ = "0.1.0"
