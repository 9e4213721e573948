# Copyright 2026 The segcast Authors.
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

"""Segment-wise multi-horizon forecasting.

Thin Python layer over the C++ core. Arrays are float64 numpy arrays in
[batch, channels, time] layout.
"""

from segcast._core import (
    ConfigError,
    DimensionError,
    Error,
    IoError,
    Model,
    ModelConfig,
    NumericError,
    ParameterError,
    UsageError,
    aux_loss,
    bench,
    budget_loss,
    cli,
    evaluate,
    flops,
    generate,
    git_blob_sha1,
    gradcheck,
    route,
    scrn_refine,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DimensionError",
    "Error",
    "IoError",
    "Model",
    "ModelConfig",
    "NumericError",
    "ParameterError",
    "UsageError",
    "aux_loss",
    "bench",
    "budget_loss",
    "cli",
    "evaluate",
    "flops",
    "generate",
    "git_blob_sha1",
    "gradcheck",
    "route",
    "scrn_refine",
    "train",
]
