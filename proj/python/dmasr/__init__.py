# Copyright 2026 The dmasr Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Dialogue-style multi-talker ASR: data preparation, simulation and scoring."""

import json as _json

from . import _core
from ._core import (
    BackendError,
    ParseError,
    ValidationError,
    build_dialogues,
    decode_response,
    default_config,
    der,
    discretize_time,
    encode_target,
    normalize_ctm,
    normalize_rttm,
    normalize_seglst,
    optimal_assignment,
    simulate,
    undiscretize_time,
)


def score(ref_seglst, hyp_seglst, config=None):
    """Score two SegLST texts and return the report as a dict."""
    text = _core.score(ref_seglst, hyp_seglst, _json.dumps(config) if config else "")
    return _json.loads(text)


__all__ = [
    "BackendError",
    "ParseError",
    "ValidationError",
    "build_dialogues",
    "decode_response",
    "default_config",
    "der",
    "discretize_time",
    "encode_target",
    "normalize_ctm",
    "normalize_rttm",
    "normalize_seglst",
    "optimal_assignment",
    "score",
    "simulate",
    "undiscretize_time",
]
