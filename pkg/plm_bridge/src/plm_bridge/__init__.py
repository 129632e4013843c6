"""plm_bridge: encoder fine-tuning that feeds the detector's eval harness."""

__version__ = "0.1.0"
