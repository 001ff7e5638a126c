"""Blockwise braided convolutional codes: encoding, sliding-window
decoding, error-propagation mitigation, and simulation tools."""

from . import channel, codec, component_code, ep_model, harness, mitigation, permutor, window_decoder

__all__ = [
    "channel",
    "codec",
    "component_code",
    "ep_model",
    "harness",
    "mitigation",
    "permutor",
    "window_decoder",
]
