"""plugdeck: a self-hostable coordination platform.

Four pieces: a datagram relay server that platforms run locally, a central
plugin registry used only for publishing and fetching plugin bundles, a
codeword-gated LAN discovery service, and the plugin developer CLI.
"""

__version__ = "0.1.0"
