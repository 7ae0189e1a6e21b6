"""Bundled sample catalog: the ten V1 architecture controls plus small
V2/V3 stubs. Useful for demos and as a parser fixture; real deployments
import their own full catalog export."""

from __future__ import annotations

from importlib import resources

from .catalog import ControlCatalog, parse_catalog_csv

SAMPLE_CATALOG_FILENAME = "sample_catalog.csv"


def sample_catalog_csv() -> str:
    return (
        resources.files("scopeforge")
        .joinpath("data", SAMPLE_CATALOG_FILENAME)
        .read_text(encoding="utf-8")
    )


def sample_catalog() -> ControlCatalog:
    return parse_catalog_csv(sample_catalog_csv())
