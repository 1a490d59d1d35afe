"""bsnsim: binary stochastic neuron hardware, from magnet physics to p-bit networks."""

__version__ = "0.1.0"
