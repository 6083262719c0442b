"""Quantum information scrambling and recovery toolkit.

Simulates the scramble / measure / time-reverse / recover protocol on
central-spin baths, layered random circuits and a fixed no-hiding unitary;
evaluates the out-of-time-ordered correlators that govern the recovered
signal; and runs the classical precessing-spin control experiment.
"""

__version__ = "0.1.0"

from .classical import (
    ClassicalModel,
    ClassicalSpinState,
    Trajectory,
    butterfly_ensemble,
    derivative,
    energy,
    integrate,
    invasive_measure,
    run_classical_protocol,
)
from .linalg import (
    DimensionLimitError,
    Spectrum,
    haar_unitary,
    hermitian_eig,
    kron,
    max_qubits,
    propagator,
    set_max_qubits,
)
from .otoc import (
    HaarEstimate,
    OtocSpec,
    VarianceRecord,
    VarianceScaling,
    fluctuation_variance,
    haar_average_analytic,
    haar_average_mc,
    haar_fourth_moment_analytic,
    haar_fourth_moment_check,
    otoc_time_series,
    otoc_value,
    scaling_fit,
)
from .protocol import (
    PAULI_SET,
    Bath,
    EchoGrid,
    ProtocolConfig,
    RecoveryResult,
    correlator_average,
    echo_grid,
    final_probability,
    joint_probability_channel,
    joint_probability_heisenberg,
    pauli_set_averaged_probability,
    plus_bath,
    recover_with_tomography,
    run_protocol_density,
    zero_bath,
)
from .scramblers import (
    CircuitScrambler,
    ExplicitUnitary,
    LayeredCircuit,
    NoHidingScrambler,
    Scrambler,
    SpinBathModel,
    SpinBathScrambler,
    build_hamiltonian,
    build_random_circuit,
    circuit_unitary,
    nohiding_unitary,
    sample_spin_bath,
    spin_bath_unitary,
)
from .states import (
    AXIS_X,
    AXIS_Y,
    AXIS_Z,
    BlochAxis,
    DegenerateBranchError,
    DensityMatrix,
    NumericalConsistencyError,
    PureState,
    embed,
    expectation,
    fidelity,
    measure_nonselective,
    measure_selective,
    partial_trace,
    pauli_along,
    projector_along,
    sample_expectations,
    tomography,
    trace_distance,
)
