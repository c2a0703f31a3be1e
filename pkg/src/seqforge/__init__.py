"""seqforge: neural named-entity recognition with a BiLSTM-CRF engine,
BRAT/CoNLL interoperability, and an annotate-train-predict loop."""

__version__ = "0.1.0"
