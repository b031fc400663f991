from ._core import (
    DataFlow,
    Dfd,
    DfdNode,
    NodeKind,
    ToolError,
    TrustBoundary,
    content_hash,
    emit_mermaid,
    generate_offline,
    parse_dfd,
    qa_findings,
    scaffold_stride_json,
    serialize_dsl,
    summarize_dfd,
    validate_dfd,
)

__all__ = [
    "DataFlow",
    "Dfd",
    "DfdNode",
    "NodeKind",
    "ToolError",
    "TrustBoundary",
    "content_hash",
    "emit_mermaid",
    "generate_offline",
    "parse_dfd",
    "qa_findings",
    "scaffold_stride_json",
    "serialize_dsl",
    "summarize_dfd",
    "validate_dfd",
]
