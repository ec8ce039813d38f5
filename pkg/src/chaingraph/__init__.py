"""chaingraph: a compiler for mixed directed/undirected probabilistic models.

Parse ``.cg`` model files, validate the chain-graph law, decompose into
chain components / component subgraphs / a master graph, answer
conditional-independence queries by moralization, emit symbolic
factorizations (text or LaTeX), expand plates, and verify every
graph-level answer with a brute-force numeric oracle.
"""

from .core import (
    ChainGraph,
    Edge,
    GraphError,
    NodeAttr,
    ValidationReport,
    Violation,
    directed,
    undirected,
    validate_chain_graph,
)
from .decompose import (
    ConditionalSubgraph,
    MasterGraph,
    Partition,
    chain_components,
    component_subgraphs,
    conditional_subgraphs,
    master_graph,
)
from .markov import (
    CiQuery,
    CliqueBoundError,
    QueryError,
    UndirectedGraph,
    implies_ci,
    max_cliques,
    moralize_chain,
    moralize_directed,
    parse_ci_query,
    separates,
    simplify_conditional_directed,
    simplify_conditional_undirected,
)
from .factorize import (
    FactorError,
    FactorExpression,
    FactorTerm,
    PlateProduct,
    condition_expression,
    eliminate_deterministic,
    factorize_chain,
    factorize_conditional,
    factorize_directed,
    factorize_undirected,
    render,
    render_term,
)
from .plates import (
    Binding,
    Plate,
    PlateError,
    PlateModel,
    expand,
    factorize_plated,
    indval,
    validate_plates,
)
from .lang import (
    Diagnostic,
    EdgeDecl,
    ModelAst,
    ModelError,
    NodeDecl,
    ParseResult,
    PlateDecl,
    ResolveResult,
    SourceSpan,
    emit_model,
    load_model,
    parse,
    parse_model,
    print_model,
    resolve,
)
from .dot import to_dot
from .oracle import (
    EquivalenceReport,
    JointTable,
    MarkovReport,
    OracleError,
    PotentialAssignment,
    QueryRecord,
    StateSpaceError,
    TermTable,
    all_singleton_queries,
    assignment_from_rng,
    build_joint,
    check_equivalence,
    check_global_markov,
    ci_deviation,
    conditional_deviation,
    eliminated_assignment,
    marginal_deviation,
    numeric_ci,
    random_assignment,
)
from . import corpus

__version__ = "0.1.0"

__all__ = [
    "ChainGraph", "Edge", "GraphError", "NodeAttr", "ValidationReport", "Violation",
    "directed", "undirected", "validate_chain_graph",
    "ConditionalSubgraph", "MasterGraph", "Partition",
    "chain_components", "component_subgraphs", "conditional_subgraphs", "master_graph",
    "CiQuery", "CliqueBoundError", "QueryError", "UndirectedGraph",
    "implies_ci", "max_cliques", "moralize_chain", "moralize_directed",
    "parse_ci_query", "separates",
    "simplify_conditional_directed", "simplify_conditional_undirected",
    "FactorError", "FactorExpression", "FactorTerm", "PlateProduct",
    "condition_expression", "eliminate_deterministic",
    "factorize_chain", "factorize_conditional", "factorize_directed", "factorize_undirected",
    "render", "render_term",
    "Binding", "Plate", "PlateError", "PlateModel",
    "expand", "factorize_plated", "indval", "validate_plates",
    "Diagnostic", "EdgeDecl", "ModelAst", "ModelError", "NodeDecl",
    "ParseResult", "PlateDecl", "ResolveResult", "SourceSpan",
    "emit_model", "load_model", "parse", "parse_model", "print_model", "resolve",
    "to_dot",
    "EquivalenceReport", "JointTable", "MarkovReport", "OracleError",
    "PotentialAssignment", "QueryRecord", "StateSpaceError", "TermTable",
    "all_singleton_queries", "assignment_from_rng",
    "build_joint", "check_equivalence", "check_global_markov",
    "ci_deviation", "conditional_deviation", "eliminated_assignment",
    "marginal_deviation", "numeric_ci", "random_assignment",
    "corpus",
    "__version__",
]
