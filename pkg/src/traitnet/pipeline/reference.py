"""Published reference scores, embedded verbatim as immutable constants.

These are reported values from the source publication's comparison tables.
They are reference constants for side-by-side display only, never acceptance
targets: desk-scale runs do not reproduce full-scale results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..core import EvaluationReport, TRAIT_NAMES


@dataclass(frozen=True)
class ReferenceRow:
    name: str
    mean: float
    per_trait: tuple  # OCEAN order


# Validation-set comparison (published values).
VALIDATION_REFERENCES = (
    ReferenceRow("DCC", 0.9122, (0.9117, 0.9133, 0.9110, 0.9158, 0.9091)),
    ReferenceRow("evolgen", 0.9134, (0.9130, 0.9136, 0.9145, 0.9157, 0.9098)),
    ReferenceRow("Gurpinar et al.", 0.9147, (0.9141, 0.9141, 0.9186, 0.9143, 0.9123)),
    ReferenceRow("PML", 0.9155, (0.9138, 0.9166, 0.9175, 0.9166, 0.9130)),
    ReferenceRow("BU-NKU", 0.9170, (0.9169, 0.9166, 0.9206, 0.9161, 0.9149)),
    ReferenceRow("Proposed method", 0.9188, (0.9166, 0.9214, 0.9208, 0.9189, 0.9162)),
)

PROPOSED_MEAN = 0.9188
PROPOSED_PER_TRAIT = (0.9166, 0.9214, 0.9208, 0.9189, 0.9162)

# Stage-1 subnetwork validation mean accuracies (published values).
SUBNET_REFERENCES = {
    "ambient (ResNet-v2-101)": 0.9116,
    "facial (MTCNN + ResNet-v2-101)": 0.9136,
    "audio (VGGish)": 0.9049,
    "transcription (ELMo)": 0.8872,
}

# Test-set footnote row (published value).
NJU_LAMDA_TEST = ReferenceRow("NJU-LAMDA (test set)", 0.9130,
                              (0.9123, 0.9166, 0.9133, 0.9126, 0.9100))


def emit_comparison_table(report: Optional[EvaluationReport] = None) -> str:
    """This run's scores beside the published reference rows."""
    headers = ("Method", "Mean") + tuple(n[:5].capitalize() for n in TRAIT_NAMES)
    rows = []
    for ref in VALIDATION_REFERENCES:
        rows.append((f"{ref.name} [published reference]", f"{ref.mean:.4f}",
                     *(f"{v:.4f}" for v in ref.per_trait)))
    if report is not None:
        label = f"This run ({report.split_name or 'unknown split'}, N={report.n_videos})"
        rows.append((label, f"{report.mean_accuracy:.4f}",
                     *(f"{v:.4f}" for v in report.per_trait_accuracy)))
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(len(headers))]
    lines = []

    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    lines.append(fmt(headers))
    lines.append(fmt(tuple("-" * w for w in widths)))
    for r in rows:
        lines.append(fmt(r))
    lines.append("")
    lines.append("Stage-1 subnetwork references (published validation mean accuracy):")
    for name, value in SUBNET_REFERENCES.items():
        lines.append(f"  {name}: {value:.4f}")
    lines.append("")
    lines.append(f"Footnote: {NJU_LAMDA_TEST.name} mean accuracy {NJU_LAMDA_TEST.mean:.4f}")
    lines.append("Published rows are reference constants from the source publication,")
    lines.append("not results reproduced by this desk-scale implementation.")
    return "\n".join(lines)
