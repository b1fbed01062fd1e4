"""Age of Information, Age of Actuation and Age of Actuated Information for
actuation-constrained discrete-time queues."""

__version__ = "0.1.0"
