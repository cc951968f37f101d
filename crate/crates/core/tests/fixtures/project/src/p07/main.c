#include <stdio.h>
#include <string.h>

static void printLine(const char *line) {
    printf("%s\n", line);
}

int main(void) {
    int i;
    char *data;
    char dataBuffer[100];
    char source[100];
    memset(dataBuffer, 'A', 100-1);
    dataBuffer[100-1] = '\0';
    data = dataBuffer;
    memset(source, 'C', 100-1);
    source[100-1] = '\0';
    memcpy(data, source, 100*sizeof(char));
    data[100-1] = '\0';
    printLine(data);
    return 0;
}
