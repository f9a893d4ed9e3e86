"""MSB-first bit writer/reader."""

from __future__ import annotations


class TruncatedStream(ValueError):
    pass


class BitWriter:
    def __init__(self):
        self._bytes = bytearray()
        self._acc = 0
        self._nacc = 0
        self.nbits = 0

    def write(self, value, nbits):
        if nbits == 0:
            return
        if value < 0 or value >> nbits:
            raise ValueError(f"{value} does not fit in {nbits} bits")
        self._acc = (self._acc << nbits) | value
        self._nacc += nbits
        self.nbits += nbits
        while self._nacc >= 8:
            self._nacc -= 8
            self._bytes.append((self._acc >> self._nacc) & 0xFF)
        self._acc &= (1 << self._nacc) - 1

    def write_bits(self, bits):
        """Write a string of '0'/'1' characters."""
        if bits:
            self.write(int(bits, 2), len(bits))

    def getvalue(self):
        """Bytes with the final partial byte zero-padded."""
        out = bytes(self._bytes)
        if self._nacc:
            out += bytes([(self._acc << (8 - self._nacc)) & 0xFF])
        return out


class BitReader:
    def __init__(self, data, nbits=None):
        self._data = bytes(data)
        self.limit = len(self._data) * 8 if nbits is None else nbits
        if self.limit > len(self._data) * 8:
            raise TruncatedStream("bit length exceeds buffer")
        self.pos = 0

    def read(self, nbits):
        if self.pos + nbits > self.limit:
            raise TruncatedStream("read past end of stream")
        value = 0
        for _ in range(nbits):
            byte = self._data[self.pos >> 3]
            value = (value << 1) | ((byte >> (7 - (self.pos & 7))) & 1)
            self.pos += 1
        return value

    def read_bit(self):
        if self.pos >= self.limit:
            raise TruncatedStream("read past end of stream")
        byte = self._data[self.pos >> 3]
        bit = (byte >> (7 - (self.pos & 7))) & 1
        self.pos += 1
        return bit

    @property
    def remaining(self):
        return self.limit - self.pos
