"""Izhikevich and piecewise-linear spiking neuron toolkit."""
from .models import (DT_HW, V_TH, KCoeffs, ModelKind, NeuronParams, NeuronState, SpikeTrain,
                     Stimulus, classify_regime, derivative, neuron_type, nullcline_value,
                     simulate, step, REGISTRY)

__all__ = ["DT_HW", "V_TH", "KCoeffs", "ModelKind", "NeuronParams", "NeuronState", "SpikeTrain",
           "Stimulus", "classify_regime", "derivative", "neuron_type", "nullcline_value",
           "simulate", "step", "REGISTRY"]
