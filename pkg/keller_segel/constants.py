""" Constants module """
from enum import IntEnum

ANGLE_TOLERANCE = 1e-9
DEFAULT_SOLVER_TOL = 1e-10
DEFAULT_DELTA = 1.0
MAX_REFINEMENT_PASSES = 64
TAU_GROWTH_FACTOR = 1.2

TIMESERIES_COLUMNS = (
    "step",
    "t",
    "tau",
    "mass_u",
    "mass_p_plus_w",
    "min_u",
    "max_u",
    "min_v",
    "max_v",
    "min_p",
    "max_p",
    "min_w",
    "max_w",
    "corner_fraction",
    "margin",
    "clamp_active",
    "picard_converged",
)
SPECIES = ("u", "v", "p", "w")


class ExitCode(IntEnum):
    SUCCESS = 0
    CHECK_FAILED = 1
    BLOWUP = 2
    UNDERFLOW = 3
    SOLVER_FAILURE = 4
    CONFIG_ERROR = 5
    IO_ERROR = 6


# Domain and mesh errors
DEGENERATE_POLYGON_ERROR = "Degenerate polygon: edges {first} and {second} {reason}"
SELF_INTERSECTION_ERROR = "Polygon is not simple: edges {first} and {second} intersect"
TOO_FEW_VERTICES_ERROR = "A polygon needs at least 3 vertices, received {count}"
ORIENTATION_ERROR = "Polygon `{name}` is not counterclockwise (signed area {area})"
ANGLE_ERROR = "Interior angle at vertex {index} is {angle} rad, expected a value strictly inside (0, 2*pi)"
UNKNOWN_PRESET_ERROR = "Unknown {kind} preset `{preset}`. Available presets: {available}"
H_TARGET_ERROR = "Expected a positive finite h_target, received {h}"
GRADING_RATIO_ERROR = "Expected a grading ratio in (0, 1], received {ratio}"
GRADING_CORNER_ERROR = "Grading corner index {index} is out of range for a polygon with {count} vertices"
NONOBTUSE_ERROR = "Mesh of `{name}` contains {count} obtuse triangles but a nonobtuse mesh was required"
REFINEMENT_ERROR = "Mesh of `{name}` still violates its size target after {passes} refinement passes"
NEGATIVE_AREA_ERROR = "Triangle {index} has non-positive signed area {area}"
NODE_INDEX_ERROR = "Triangle {index} references node {node}, but the mesh has {count} nodes"
EDGE_MULTIPLICITY_ERROR = "Edge {edge} is shared by {count} triangles"
BOUNDARY_MISMATCH_ERROR = (
    "Boundary edge list does not match the edges used by a single triangle: {missing} unlisted, {extra} spurious"
)
MESH_SECTION_ERROR = "Expected a `{section} <count>` header, received `{received}`"
MESH_VALUE_ERROR = "Expected {expected} values, received `{received}`"
MESH_INDEX_ERROR = "Index {index} is out of range for {count} nodes"

# Operator errors
FIELD_LENGTH_ERROR = "Field has {received} values but mesh `{mesh_id}` has {expected} nodes"
FIELD_MESH_ERROR = "Field belongs to mesh `{received}`, expected mesh `{expected}`"
OPERATOR_DIMENSION_ERROR = "Operator of dimension {dimension} cannot act on a vector of length {length}"
NON_FINITE_RHS_ERROR = "Right-hand side contains {count} non-finite entries"

# Reaction errors
NON_FINITE_INPUT_ERROR = "Non-finite input passed to {name}"
NON_FINITE_OUTPUT_ERROR = "{name} produced non-finite values"
NEGATIVE_RATE_ERROR = "Reaction rate `{name}` must be finite and nonnegative, received {value}"
KAPPA_FLOOR_ERROR = "Diffusion coefficient {value} at node {node} is below the floor {floor}"
KAPPA_FLOOR_VALUE_ERROR = "kappa_floor must be finite and strictly positive, received {value}"
SAMPLES_ERROR = "Expected at least one sample per axis, received {samples}"
CUTOFF_DELTA_ERROR = "The cut-off margin delta must be positive, received {delta}"
EXPRESSION_ERROR = "Invalid expression `{expression}`: {reason}"

# Stepper errors
STEP_CONFIG_ERROR = "Invalid step configuration: {reason}"
UNDERFLOW_ERROR = "Halving tau={tau} would drop below tau_min={tau_min}"
STATE_MESH_ERROR = "State fields live on different meshes: {mesh_ids}"

# Configuration errors
UNKNOWN_SECTION_ERROR = "unknown section [{section}]"
UNKNOWN_KEY_ERROR = "unknown key `{key}` in section [{section}]"
MISSING_KEY_ERROR = "missing required key `{key}` in section [{section}]"
DUPLICATE_KEY_ERROR = "key `{key}` is defined twice in section [{section}]"
SYNTAX_ERROR = "expected `key = value` or `[section]`, received `{received}`"
KEY_OUTSIDE_SECTION_ERROR = "key `{key}` appears before any [section] header"
VALUE_ERROR = "key `{key}` in section [{section}]: {message}"
YAML_VALUE_ERROR = "unable to parse value `{received}`"
SECTION_TYPE_ERROR = "section [{section}] must be a mapping of keys to values"
DEPENDENT_KEY_ERROR = "key `{key}` in section [{section}] is required when {condition}"
CLOSE_MATCHES_HINT = "\n\nDid you mean one of these?\n\n- "
UNSUPPORTED_FORMAT_ERROR = "Unsupported configuration file format: {path}"
DECODE_ERROR = "unable to decode {path}: {reason}"
CORNER_VERTEX_ERROR = "corner_vertex {index} is out of range for a polygon with {count} vertices"
INITIAL_LENGTH_ERROR = "Initial condition file `{path}` has {received} values, expected {expected}"
INITIAL_COLUMN_ERROR = "Snapshot file `{path}` has no column for field `{field}`"
INITIAL_READ_ERROR = "Unable to read initial condition file `{path}`: {reason}"
INITIAL_FORMAT_ERROR = "Initial condition file `{path}` is neither a snapshot nor a single column of numbers"
INITIAL_KIND_ERROR = "Unknown initial condition kind `{kind}`"

# Validation errors
VALIDATE_TYPE_ERROR = 'Expected: {article} "{type}" type value\n\nReceived: {received}'
VALIDATE_ENUM_ERROR = "Expected: a member of the enum {enum}\n\nReceived: {received}"
VALIDATE_MINIMUM_ERROR = "The value {data} is lower than the specified minimum of {minimum}"
VALIDATE_EXCLUSIVE_MINIMUM_ERROR = "The value {data} must be strictly greater than {minimum}"
VALIDATE_MAXIMUM_ERROR = "The value {data} exceeds the maximum allowed value of {maximum}"
VALIDATE_EXCLUSIVE_MAXIMUM_ERROR = "The value {data} must be strictly lower than {maximum}"
VALIDATE_MIN_ARRAY_LENGTH_ERROR = (
    "The length of the array {data} is shorter than the specified minimum length of {min_length}"
)
VALIDATE_MAX_ARRAY_LENGTH_ERROR = "The length of the array {data} exceeds the specified maximum length of {max_length}"
