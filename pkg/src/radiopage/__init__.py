"""radiopage: pre-rendered webpages broadcast as images over an audio modem.

The transmit path rasterizes a page screenshot to a fixed 1080-px-wide
RGB565 grid, slices it into 1-px-wide column partitions carried in 100-byte
frames, protects each frame with CRC32 + convolutional + Reed-Solomon
coding, and modulates the coded frames as OFDM audio inside the FM mono
baseband.  The receive path reverses the stack and repairs missing columns
with nearest-neighbor interpolation.  A broadcast carousel scheduler and an
SMS-style request uplink sit on top.
"""

__version__ = "0.1.0"
