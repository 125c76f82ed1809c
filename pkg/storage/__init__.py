from .report_storage import ReportStorage
