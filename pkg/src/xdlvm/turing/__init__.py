from .codec import (
    CodecError,
    EncodingOverflow,
    HeadAmbiguous,
    UndecodableState,
    UnknownColour,
    decode_snapshot,
    decode_state,
    decode_tape,
    encode_state,
    load_configuration,
)
from .compiler import (
    CompiledRun,
    CompileError,
    compile_tm,
    error_condition,
    halt_condition,
    iteration_snapshots,
    leaf_steps_per_transition,
    render_compiled,
    run_compiled,
)
from .fixtures import BINARY_ADDER, BUSY_BEAVER_3, adder_tape, fixture_machine, random_binary_machine
from .machine import (
    HALTED,
    NoRule,
    OracleError,
    OracleRun,
    Rule,
    TapeBounds,
    TmConfiguration,
    TmSpec,
    initial_configuration,
    load_machine,
    oracle_run,
    oracle_step,
    oracle_trace,
    parse_tape,
)
