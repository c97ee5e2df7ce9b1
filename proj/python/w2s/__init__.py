"""Weak-to-strong generalization harness, native core plus a thin wrapper."""

try:
    from ._w2s import (  # type: ignore[attr-defined]
        BackendError,
        ConfigError,
        DataError,
        FailureCapError,
        bm25_rank,
        builtin_template,
        extract_label,
        fnv1a64,
        format_confidence,
        hard_vote,
        mix_seed,
        render_template,
        run_command,
        sha256_hex,
        soft_vote,
        template_names,
        tokenize,
        write_builtin_templates,
    )
except ImportError:  # local builds put _w2s on sys.path instead
    from _w2s import (
        BackendError,
        ConfigError,
        DataError,
        FailureCapError,
        bm25_rank,
        builtin_template,
        extract_label,
        fnv1a64,
        format_confidence,
        hard_vote,
        mix_seed,
        render_template,
        run_command,
        sha256_hex,
        soft_vote,
        template_names,
        tokenize,
        write_builtin_templates,
    )

__all__ = [
    "BackendError",
    "ConfigError",
    "DataError",
    "FailureCapError",
    "bm25_rank",
    "builtin_template",
    "extract_label",
    "fnv1a64",
    "format_confidence",
    "hard_vote",
    "mix_seed",
    "render_template",
    "run_command",
    "sha256_hex",
    "soft_vote",
    "template_names",
    "tokenize",
    "write_builtin_templates",
]

__version__ = "0.1.0"
