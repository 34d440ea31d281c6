"""Singular symplectic structures from celestial-mechanics coordinate changes."""
