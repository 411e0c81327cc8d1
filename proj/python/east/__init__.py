# Copyright 2026 The EAsT Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https:#www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Feature-space distillation with pre-trained embeddings as teachers.

Arrays are NumPy float64; per-clip sequences are (frames, channels) arrays.
Library errors raise :class:`EastError` (or its subclass :class:`FormatError`
for malformed files); the message starts with the error kind.
"""

from ._east import (
    Dataset,
    EastError,
    FormatError,
    align_time,
    average_precision,
    cosine_distance,
    distance_covariance_sq,
    double_center,
    evaluate,
    generate,
    kd_loss,
    limited_data_experiment,
    masked_bce,
    pairwise_euclidean,
    param_count,
    predict_logits,
    regularization_loss,
    regularization_loss_and_grad,
    roc_auc,
    split,
    sweep_lambda,
    throughput,
    train,
)

__all__ = [
    "Dataset",
    "EastError",
    "FormatError",
    "align_time",
    "average_precision",
    "cosine_distance",
    "distance_covariance_sq",
    "double_center",
    "evaluate",
    "generate",
    "kd_loss",
    "limited_data_experiment",
    "masked_bce",
    "pairwise_euclidean",
    "param_count",
    "predict_logits",
    "regularization_loss",
    "regularization_loss_and_grad",
    "roc_auc",
    "split",
    "sweep_lambda",
    "throughput",
    "train",
]
