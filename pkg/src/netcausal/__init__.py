"""Causal discovery and interventional prediction for network performance data.

The toolkit covers the full pipeline: ingesting observational measurement
tables, simulating structural causal models with known ground truth,
kernel-based (in)dependence testing, constraint-based graph discovery,
graphical back-door analysis, and copula-based prediction of
post-intervention outcome distributions.
"""

__version__ = "0.1.0"

from netcausal.dataset import Dataset, SummaryRow, VariableMeta, load_csv, standardize, summarize
from netcausal.graph import BackdoorCertificate, Cpdag, Dag
from netcausal.independence import CiTestResult, KernelConfig
from netcausal.scm import ScmSpec, generate_scm, intervene_scm

__all__ = [
    "BackdoorCertificate",
    "CiTestResult",
    "Cpdag",
    "Dag",
    "Dataset",
    "KernelConfig",
    "ScmSpec",
    "SummaryRow",
    "VariableMeta",
    "generate_scm",
    "intervene_scm",
    "load_csv",
    "standardize",
    "summarize",
]
