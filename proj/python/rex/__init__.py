# SPDX-License-Identifier: Apache-2.0
"""Python access to the rex relation-extraction core.

Instances are plain dicts in the TACRED record layout
(``token``, ``subj_start``, ``subj_end``, ``obj_start``, ``obj_end``,
``subj_type``, ``obj_type``, ``relation``, ``id``).
"""

import json

from . import _core
from ._core import IoError, ParseError, UsageError, ValidationError

__all__ = [
    "IoError",
    "ParseError",
    "UsageError",
    "ValidationError",
    "build_filtered",
    "generate",
    "lr_at",
    "mark",
    "run_cli",
    "score",
]


def mark(record, scheme="typed_entity_marker_punct", head_anchor="entity_first", mask_mode="collapse"):
    """Marked-export record: marked_tokens, subj_head, obj_head, special_tokens."""
    return json.loads(_core.mark(json.dumps(record), scheme, head_anchor, mask_mode))


def score(gold, pred, labels, na_label="no_relation"):
    """Micro-F1 report; NA predictions and gold labels do not count as positives."""
    return json.loads(_core.score(list(gold), list(pred), list(labels), na_label))


def lr_at(step, total, base_lr, warmup_fraction=0.1):
    return _core.lr_at(step, total, base_lr, warmup_fraction)


def build_filtered(test, train, case_fold=False, same_role=False, na_label="no_relation"):
    """Split report with kept_ids and pruned_ids."""
    return json.loads(_core.build_filtered(json.dumps(test), json.dumps(train), case_fold, same_role, na_label))


def generate(config_text=""):
    """Synthetic corpus as {train, dev, test_unseen, schema}; config_text uses the .cfg syntax."""
    return json.loads(_core.generate(config_text))


def run_cli(*args):
    """Runs the rex command line in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])
