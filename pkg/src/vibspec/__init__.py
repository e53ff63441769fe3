"""Normal-mode spectra of charged pendulum chains and random mass-stiffness matrix pairs."""

__version__ = "0.1.0"
