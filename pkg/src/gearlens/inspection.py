"""End-to-end inspection: filtered images for the operator, verdict, report.

One call produces the four edge-highlighted images as "<stem>_<kernel>.pgm"
files for visual review, classifies the part, and derives the keep/discard
decision: a part predicted broken is discarded. The report text pins four
LF-terminated lines with probabilities printed as the shortest decimal
that round-trips the value as a 32-bit float, matching the digit counts of
the reference output; probability lines are ordered by descending
probability with ties listing the normal class first.
"""

import enum
import os
from dataclasses import dataclass

import numpy as np

from .classifier import CLASS_NAMES, Probabilities, SoftmaxHead, classify, predict
from .dataset import Label
from .filters import GaussianSpec, apply_filter_bank
from .imagecore import RgbImage, rgb_to_gray, save_pnm

REPORT_HEADER = "[INFO]The results of the retrained model are as follows:"


class Decision(enum.Enum):
    KEEP = "keep"
    DISCARD = "discard"


@dataclass(frozen=True)
class InspectionReport:
    probabilities: Probabilities
    predicted: Label
    decision: Decision
    filtered_paths: tuple[str, ...]

    def __post_init__(self):
        if self.predicted != classify(self.probabilities):
            raise ValueError("predicted label must equal classify(probabilities)")
        expected = Decision.DISCARD if self.predicted is Label.BROKEN_GEAR else Decision.KEEP
        if self.decision is not expected:
            raise ValueError("decision must be Discard iff the part is predicted broken")


def _float32_shortest(value: float) -> str:
    return str(np.float32(value))


def format_report(probs: Probabilities) -> str:
    """Four-line operator report; see the module docstring for the format."""
    if len(probs.values) != 2:
        raise ValueError("report expects two-class probabilities")
    order = [0, 1] if probs.values[0] >= probs.values[1] else [1, 0]
    lines = [REPORT_HEADER]
    for index in order:
        lines.append(
            f"[INFO]Probability that the given image is a {CLASS_NAMES[index]} is: "
            f"{_float32_shortest(probs.values[index])}"
        )
    lines.append(f"[INFO]The given component is a: {classify(probs).value}")
    return "".join(line + "\n" for line in lines)


def inspect(
    image: RgbImage,
    head: SoftmaxHead,
    blur: GaussianSpec,
    output_dir: str,
    stem: str = "image",
) -> InspectionReport:
    """Write the four filtered images, classify, and decide keep/discard."""
    os.makedirs(output_dir, exist_ok=True)
    bank = apply_filter_bank(rgb_to_gray(image), blur)
    paths = []
    for name, filtered in bank.items():
        path = os.path.join(output_dir, f"{stem}_{name}.pgm")
        with open(path, "wb") as fh:
            fh.write(save_pnm(filtered))
        paths.append(path)

    probs = predict(head, image)
    predicted = classify(probs)
    decision = Decision.DISCARD if predicted is Label.BROKEN_GEAR else Decision.KEEP
    return InspectionReport(
        probabilities=probs,
        predicted=predicted,
        decision=decision,
        filtered_paths=tuple(paths),
    )
