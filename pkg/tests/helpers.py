"""Shared test utilities."""
from srlinksim.config import ChannelProfile, make_config

FLAT = ChannelProfile(direct_taps=1, forward_taps=1, backscatter_taps=1)


def make_cfg(**kw):
    """make_config that drops to single-tap links when the CP is too short
    for the default multipath profile."""
    if "channel_profile" not in kw and kw.get("cp_len", 8) < 3:
        kw["channel_profile"] = FLAT
    return make_config(**kw)
