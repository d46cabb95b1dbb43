"""DATOS Lab - decentralized adaptive three-operator splitting over gossip networks."""

__version__ = "0.1.0"
