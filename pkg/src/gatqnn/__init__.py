"""GA-trained hybrid quantum neural networks with backend-aware microCircuit selection."""

__version__ = "0.1.0"
