from django.contrib import admin
from django.urls import include, path

admin.site.site_header = 'honeysift'
admin.site.site_title = 'honeysift admin'

urlpatterns = [
    path('admin/', admin.site.urls),
    path('', include('web.urls')),
]
