"""mm-wave multipath propagation engine: image-method ray tracing with
reflection, transmission, UTD diffraction and diffuse scattering, plus
channel metrics and 3GPP reference models."""

__version__ = "0.1.0"
