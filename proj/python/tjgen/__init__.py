"""Gate-level hardware Trojan analysis, training and insertion."""

import json

from ._core import (
    Netlist,
    Template,
    TjgenError,
    Trojan,
    baseline_insert,
    extract_features,
    feature_names,
    generate_netlist,
    insert_trojans,
    justify,
    load_template,
    parse_netlist,
    read_netlist,
    scoap,
    simulate,
    template_ids,
    train,
    trojan_feature_names,
    verify_inserted,
)

__all__ = [
    "Netlist",
    "Template",
    "TjgenError",
    "Trojan",
    "baseline_insert",
    "extract_features",
    "feature_names",
    "generate_netlist",
    "insert_trojans",
    "justify",
    "load_template",
    "parse_netlist",
    "read_netlist",
    "report",
    "scoap",
    "simulate",
    "template_ids",
    "train",
    "trojan_feature_names",
    "verify_inserted",
]

__version__ = "0.1.0"


def report(trojan):
    """The Trojan's insertion report as a dict."""
    return json.loads(trojan.report_json)
