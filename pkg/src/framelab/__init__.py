"""framelab: a numerical laboratory for k-frame flows, Clifford and exterior
fiber algebras, matrix-valued symbol transport, and exact finite quantum
models on torus bundles."""

__version__ = "0.1.0"

from .geometry import (ChartMetric, CotangentPoint, Trajectory, christoffel,
                       geodesic_flow, parallel_transport, sample_liouville,
                       sampled_curve)
from .models import flat_torus, genus2_hyperbolic, kaehler_torus, make_model, round_sphere
from .frameflow import (FrameObservable, KFrameState, birkhoff_average,
                        ergodicity_report, frame_flow, kahler_integrals)
from .clifford import (CliffordRep, build_clifford, fiber_states, haar_average_T,
                       projections_pm, spin_stabilizer_generators, symbol_F)
from .exterior import (ExteriorFiber, ext_mult, fiber_states_forms,
                       haar_average_T_forms, hodge_star, int_mult, projection_P,
                       projections_pm_forms, so_stabilizer_generators)
from .commutant import CommutantResult, commutant, match_labels
from .transport import (ConnectionSpec, SymbolField, beta_evolve, cesaro_and_decay,
                        flat_connection, levi_civita_forms, levi_civita_spinor,
                        state_integrate, torus_bundle_connection, transport_matrix)
from .quantization import (SpectralData, TorusBundleModel, TrigSymbol,
                           TruncatedOperator, assemble_P, egorov_compare,
                           extract_symbol, heisenberg, qe_variance, quantize,
                           sqrt_and_propagator, trig_symbol, weyl_mean)
from .harness import ResultRecord, run, suite
