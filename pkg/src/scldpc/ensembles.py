"""Ensemble descriptors shared by samplers, analysis, and the CLI."""

from dataclasses import dataclass

from .protograph import build_base, couple

FAMILIES = ("protograph", "random")


@dataclass(frozen=True)
class EnsembleSpec:
    """A coupled (l,r,L) ensemble, protograph-based or unstructured random."""

    family: str
    l: int
    r: int
    L: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.l < 2 or self.r < self.l:
            raise ValueError(f"need 2 <= l <= r, got l={self.l}, r={self.r}")
        if self.L < 1:
            raise ValueError(f"need L >= 1, got L={self.L}")

    @property
    def is_protograph(self):
        return self.family == "protograph"

    def coupled_protograph(self):
        if not self.is_protograph:
            raise ValueError("random ensembles have no coupled protograph")
        return couple(build_base(self.l, self.r), self.L)

    def label(self):
        suffix = "_P" if self.is_protograph else ""
        return f"({self.l},{self.r},{self.L}){suffix}"
