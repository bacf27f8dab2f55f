"""Probing-task datasets: synthesis from corpora and adaptation of annotated fixtures."""

from .instances import (
    BSOInstance,
    DatasetSplit,
    DCInstance,
    LabelSpace,
    PairRelInstance,
    RSTNodeInstance,
    SPInstance,
    SSPInstance,
    TaskInstance,
    bso_label_space,
    dc_label_space,
    sp_label_space,
    ssp_label_space,
)
from .pdtb import PdtbAdaptResult, PdtbRecord, adapt_pdtb, parse_pdtb_records, remove_connective
from .rst import (
    RST_RELATIONS,
    RSTDocument,
    RSTLeaf,
    RSTTree,
    adapt_rst,
    binarize_rst,
    extract_rst_instances,
    parse_rst_records,
)
from .synth import (
    category_similarity,
    split_by_document,
    synth_bso,
    synth_dc_docs,
    synth_dc_threads,
    synth_sp,
    synth_ssp,
)
from .tsv import deserialize_dataset, serialize_dataset

__all__ = [
    "BSOInstance",
    "DatasetSplit",
    "DCInstance",
    "LabelSpace",
    "PairRelInstance",
    "RSTNodeInstance",
    "SPInstance",
    "SSPInstance",
    "TaskInstance",
    "bso_label_space",
    "dc_label_space",
    "sp_label_space",
    "ssp_label_space",
    "PdtbAdaptResult",
    "PdtbRecord",
    "adapt_pdtb",
    "parse_pdtb_records",
    "remove_connective",
    "RST_RELATIONS",
    "RSTDocument",
    "RSTLeaf",
    "RSTTree",
    "adapt_rst",
    "binarize_rst",
    "extract_rst_instances",
    "parse_rst_records",
    "category_similarity",
    "split_by_document",
    "synth_bso",
    "synth_dc_docs",
    "synth_dc_threads",
    "synth_sp",
    "synth_ssp",
    "deserialize_dataset",
    "serialize_dataset",
]
