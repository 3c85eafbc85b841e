# tsaextreme - time series aggregation with extreme periods for energy system design
__version__ = "0.1.0"
