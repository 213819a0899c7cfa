from django.contrib import admin

from .models import DetectionRun, SignatureRecord, SuspectPattern


class SuspectPatternInline(admin.TabularInline):
    model = SuspectPattern
    extra = 0
    fields = ('rank', 'hex', 'f_q', 'coincidences', 'packets')
    readonly_fields = fields
    can_delete = False


@admin.register(DetectionRun)
class DetectionRunAdmin(admin.ModelAdmin):
    list_display = ('corpus_id', 'finished_at', 'set_count', 'suspect_count')
    search_fields = ('corpus_id',)
    readonly_fields = ('started_at', 'finished_at', 'config', 'recorded_at')
    inlines = (SuspectPatternInline,)

    @admin.display(description='suspects')
    def suspect_count(self, obj: DetectionRun) -> int:
        return obj.suspects.count()


@admin.register(SignatureRecord)
class SignatureRecordAdmin(admin.ModelAdmin):
    list_display = ('pattern_hash', 'length', 'created_at', 'first_run')
    search_fields = ('digest',)
    readonly_fields = ('digest', 'hex', 'length', 'pattern_hash', 'created_at', 'first_run')
    exclude = ('pattern',)
